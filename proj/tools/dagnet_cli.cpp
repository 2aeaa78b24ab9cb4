#include "dagnet/cli.hpp"

int main(int argc, char** argv) { return dagnet::cli_main(argc, argv); }
