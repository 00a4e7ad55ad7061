#include "pila/cli.hpp"

int main(int argc, char** argv) { return pila::cli::run(argc, argv); }
