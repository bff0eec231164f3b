#include "gsps/cli.hpp"

int main(int argc, char** argv) { return gsps::cli::dispatch(argc, argv); }
