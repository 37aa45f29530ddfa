#include "calguard/cli.hpp"

int main(int argc, char** argv) { return calguard::cli::dispatch(argc, argv); }
