#include "membrane/cli.hpp"

int main(int argc, char** argv)
{
    return membrane::run_cli(argc, argv);
}
