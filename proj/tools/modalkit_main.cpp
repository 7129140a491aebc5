#include "modalkit/cli.hpp"

int main(int argc, char** argv) { return modalkit::cli::run(argc, argv); }
