#include "magnonics/cli.hpp"

int main(int argc, char** argv) { return magnonics::cli_main(argc, argv); }
