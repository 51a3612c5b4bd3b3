#include "kmdeblur/cli.hpp"

int main(int argc, char** argv) { return kmdeblur::cli::run(argc, argv); }
