#include "srouda/experiment.hpp"
#include <cstdio>
int main() { std::printf("acceptance placeholder\n"); return 0; }
