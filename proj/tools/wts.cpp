#include "wts/cli.hpp"

int main(int argc, char** argv) { return wts::run_cli(argc, argv); }
