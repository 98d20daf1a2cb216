#include "moeprof/cli/commands.hpp"

int main(int argc, char** argv) { return moeprof::cli::run(argc, argv); }
