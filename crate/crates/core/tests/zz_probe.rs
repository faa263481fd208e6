use std::cell::Cell;

thread_local! {
    static INNER: Cell<u64> = const { Cell::new(0) };
    static OUTER: Cell<u64> = const { Cell::new(0) };
    static MAXDEPTH: Cell<u32> = const { Cell::new(0) };
}

fn f(x1: f64, x2: f64) -> f64 {
    if x1 <= 1.0 { return 0.0; }
    let tail = if x2 == 0.0 { 0.0 } else { x2.abs() * (2.0 * x1).exp() };
    (1.0 - 2f64.ln() + x1 - tail).exp()
}

fn simpson(g: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32, maxd: u32) -> f64 {
    MAXDEPTH.with(|m| if depth > m.get() { m.set(depth) });
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (g(a), g(m), g(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(g, a, b, fa, fm, fb, whole, tol, depth, maxd)
}

#[allow(clippy::too_many_arguments)]
fn rec(g: &mut impl FnMut(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32, maxd: u32) -> f64 {
    MAXDEPTH.with(|m| if depth > m.get() { m.set(depth) });
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || depth >= maxd {
        return left + right + delta / 15.0;
    }
    rec(g, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, maxd)
        + rec(g, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, maxd)
}

#[test]
fn probe() {
    for b in [8.0f64, 16.0] {
        INNER.with(|c| c.set(0)); OUTER.with(|c| c.set(0)); MAXDEPTH.with(|c| c.set(0));
        let tol = 1e-9;
        let inner_tol = tol / (2.0 * b);
        let mut outer = |x1: f64| {
            OUTER.with(|c| c.set(c.get() + 1));
            let mut inner = |x2: f64| { INNER.with(|c| c.set(c.get() + 1)); f(x1, x2) };
            simpson(&mut inner, -b, b, inner_tol, 0, 200)
        };
        let t = std::time::Instant::now();
        let v = simpson(&mut outer, -b, b, tol, 0, 200);
        println!("B={b}: value {v:.9} outer_evals={} inner_evals={} maxdepth={} in {:?}",
            OUTER.with(|c| c.get()), INNER.with(|c| c.get()), MAXDEPTH.with(|c| c.get()), t.elapsed());
    }
}
