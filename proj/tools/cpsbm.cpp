#include "cli.hpp"

int main(int argc, char** argv) { return cpsbm::cli::dispatch(argc, argv); }
