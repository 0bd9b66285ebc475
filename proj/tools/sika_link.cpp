#include <iostream>

#include "sika/app.hpp"

int main(int argc, char** argv) { return sika::app::run(argc, argv, std::cout, std::cerr); }
