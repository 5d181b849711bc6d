// Apache License, Version 2.0, refer to LICENSE.txt.

#include "latrec/cli.hpp"

int main(int argc, char** argv) { return latrec::run_cli(argc, argv); }
