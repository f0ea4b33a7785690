#include <cstdio>

int main() {
    std::puts("dica: placeholder");
    return 0;
}
