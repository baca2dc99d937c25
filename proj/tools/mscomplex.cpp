int main() { return 0; } // stub until the cli module lands
