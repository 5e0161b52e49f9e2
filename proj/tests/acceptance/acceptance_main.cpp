#include <cstdio>
int main() { std::puts("FAIL acceptance suite not implemented"); return 1; }
