#include "sat/cli/satctl.hpp"

int main(int argc, char** argv) { return sat::cli::main_entry(argc, argv); }
