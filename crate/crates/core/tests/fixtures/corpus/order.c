static int max2(int a, int b) {
    if (a > b) {
        return a;
    }
    return b;
}

static int min2(int a, int b) {
    if (a < b) {
        return a;
    }
    return b;
}

int median3(int a, int b, int c) {
    int hi = max2(max2(a, b), c);
    int lo = min2(min2(a, b), c);
    return a + b + c - hi - lo;
}

int sum_range(int lo, int hi) {
    int sum = 0;
    int i;
    if (lo > hi) {
        int tmp = lo;
        lo = hi;
        hi = tmp;
    }
    for (i = lo; i <= hi; i = i + 1) {
        sum = sum + i;
    }
    return sum;
}
