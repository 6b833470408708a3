#include "prl/cli.hpp"

int main(int argc, char** argv) { return prl::cli::run(argc, argv); }
