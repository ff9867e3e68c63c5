#include "coarsemodel/cli/commands.hpp"

int main(int argc, char** argv) { return coarsemodel::cli::main(argc, argv); }
