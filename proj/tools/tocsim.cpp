#include "tocsim/cli.hpp"

int main(int argc, char** argv) { return tocsim::cli::main(argc, argv); }
