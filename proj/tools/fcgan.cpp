#include "fcgan/cli.hpp"

int main(int argc, char** argv) { return fcgan::run_cli(argc, argv); }
