static int sign(int v) {
    if (v > 0) {
        return 1;
    }
    if (v < 0) {
        return -1;
    }
    return 0;
}

int clamp_add(int a, int b) {
    int s = a + b;
    if (s > 100) {
        return 100;
    }
    if (s < -100) {
        return -100;
    }
    return s;
}

int abs_diff(int a, int b) {
    int d = a - b;
    if (sign(d) < 0) {
        return -d;
    }
    return d;
}

int safe_div(int num, int den) {
    if (den == 0) {
        return 0;
    }
    if (sign(num) != sign(den)) {
        return -(abs_diff(num, 0) / abs_diff(den, 0));
    }
    return num / den;
}
