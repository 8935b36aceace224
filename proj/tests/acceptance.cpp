// Placeholder during bring-up; the real acceptance suite lands after the
// unit tests are green.
int main() { return 0; }
