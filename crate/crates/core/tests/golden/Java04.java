class Fib {
    static long fib(int n) {
        long a = 0L, b = 1L;
        while (n-- > 0) {
            long t = a + b;
            a = b;
            b = t;
        }
        return a;
    }
}
