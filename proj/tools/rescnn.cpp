#include "rescnn/cli.hpp"

int main(int argc, char** argv) { return rescnn::cli::run(argc, argv); }
