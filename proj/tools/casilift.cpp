#include "casilift/cli.hpp"

int main(int argc, char** argv) { return casilift::cli::run(argc, argv); }
