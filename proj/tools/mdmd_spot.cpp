#include "mdmd/cli.hpp"

int main(int argc, char** argv) { return mdmd::cli::run(argc, argv); }
