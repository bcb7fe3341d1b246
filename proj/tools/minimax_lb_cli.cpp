#include "minimax_lb/cli.hpp"

int main(int argc, char** argv) { return minimax_lb::cli::run_main(argc, argv); }
