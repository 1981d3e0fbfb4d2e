#include "cli.hpp"

int main(int argc, char** argv) { return anett::cli::run(argc, argv); }
