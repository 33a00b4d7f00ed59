#include "binfair/cli.hpp"

int main(int argc, char** argv) { return binfair::cli::run(argc, argv); }
