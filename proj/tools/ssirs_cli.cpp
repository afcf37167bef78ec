// Command-line front end (placeholder while the optimizer stack is built;
// replaced by the full simulate/sweep/oracle-check/plot driver).

#include <cstdio>

int main() {
    std::puts("ssirs: optimizer stack not wired up yet");
    return 2;
}
