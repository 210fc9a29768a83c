// placeholder while the library comes up; replaced by the full CLI
#include <cstdio>

int main() {
    std::puts("monotonet");
    return 0;
}
