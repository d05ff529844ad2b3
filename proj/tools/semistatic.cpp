#include "semistatic/cli.hpp"

int main(int argc, char** argv) { return semistatic::cli::run(argc, argv); }
