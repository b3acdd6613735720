#include "bistab/cli/commands.hpp"

int main(int argc, char** argv) { return bistab::cli::run(argc, argv); }
