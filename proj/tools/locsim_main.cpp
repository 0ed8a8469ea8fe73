// CLI stub; real implementation arrives with the simulation harness.
int main() { return 0; }
