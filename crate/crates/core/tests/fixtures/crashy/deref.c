int deref_or_default(const int *p, int fallback) {
    if (p == 0) {
        return fallback;
    }
    return *p;
}
