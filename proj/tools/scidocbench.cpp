#include "scidocbench/cli.hpp"

int main(int argc, char** argv) { return sdb::cli::run(argc, argv); }
