#include "seqforge/cli.hpp"

int main(int argc, char** argv) { return seqforge::cli::run(argc, argv); }
