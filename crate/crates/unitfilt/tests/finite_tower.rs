use unitfilt::finlevel::gens::{FinEvaluator, FinGenerators};
use unitfilt::finlevel::{norm_down, norm_to, FnCtx};
use unitfilt::fq::FqElem;
use unitfilt::groupring::{fn_poly, Gen};

#[test]
fn two_step_norm_is_the_composite() {
    for (p, f) in [(3u64, 1usize), (3, 2), (5, 1)] {
        let k = 4;
        let c2 = FnCtx::new(p, f, 2, k).unwrap();
        let c3 = FnCtx::new(p, f, 3, k).unwrap();
        let c4 = FnCtx::new(p, f, 4, k).unwrap();
        for z in [
            c4.from_terms(&[(1, FqElem(1)), (7, FqElem(2))]),
            c4.from_terms(&[(5, FqElem(1))]),
            c4.zeta(),
        ] {
            let direct = norm_to(&c4, &c2, &z).unwrap();
            let steps = norm_down(&c3, &c2, &norm_down(&c4, &c3, &z).unwrap()).unwrap();
            assert_eq!(direct, steps, "p={p} f={f}");
        }
    }
}

#[test]
fn f_n_annihilates_level_n_generators() {
    for (p, f, n) in [(3u64, 1usize, 2u32), (3, 2, 2), (5, 1, 2), (3, 1, 3)] {
        let pn = (p as usize).pow(n);
        let ctx = FnCtx::new(p, f, n, FnCtx::precision_for(p, n, pn + 2 * p as usize)).unwrap();
        let poly = fn_poly(p, f, ctx.kexp, n, pn / p as usize + 2).unwrap();
        for r in 2..=p as i64 {
            let g = FinGenerators::build(&ctx, r).unwrap();
            let mut ev = FinEvaluator::new(&ctx, &g);
            let z = ev.eval_a(&poly, Gen::U).unwrap();
            assert!(ctx.is_one(&z), "p={p} f={f} n={n} r={r}");
            if r == p as i64 {
                assert!(ctx.is_one(&ev.eval_a(&poly, Gen::W).unwrap()));
            }
        }
    }
}
