#include "fracpme/cli.hpp"

int main(int argc, char** argv) { return fracpme::cli::main(argc, argv); }
