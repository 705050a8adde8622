#include "sd/cli.hpp"

int main(int argc, char** argv) { return sd::cli::main(argc, argv); }
