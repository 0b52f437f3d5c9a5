#include "artarena/cli.hpp"

int main(int argc, char** argv) { return artarena::run_cli(argc, argv); }
