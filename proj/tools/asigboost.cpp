#include "asigboost/cli.hpp"

int main(int argc, char** argv) { return asigboost::run_cli(argc, argv); }
