#include "addgxe/cli.hpp"

int main(int argc, char** argv) { return addgxe::run(argc, argv); }
