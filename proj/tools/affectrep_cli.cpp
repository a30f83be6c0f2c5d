#include "affectrep/cli.hpp"

int main(int argc, char** argv) { return affectrep::cli::run(argc, argv); }
