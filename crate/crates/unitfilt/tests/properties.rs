use proptest::prelude::*;

use unitfilt::fq::{FqContext, FqElem};
use unitfilt::indexfn::IndexParams;
use unitfilt::normfield::NormCtx;
use unitfilt::padic::PadicInt;

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7])
}

proptest! {
    #[test]
    fn padic_ring_laws(p in prime(), a in any::<i32>(), b in any::<i32>(), c in any::<i32>()) {
        let k = 5;
        let (x, y, z) = (PadicInt::new(p, k, a as i64), PadicInt::new(p, k, b as i64), PadicInt::new(p, k, c as i64));
        prop_assert_eq!(x.mul(&y.add(&z)), x.mul(&y).add(&x.mul(&z)));
        prop_assert_eq!(x.sub(&x), PadicInt::zero(p, k));
        if x.is_unit() {
            prop_assert_eq!(x.mul(&x.inv().unwrap()), PadicInt::one(p, k));
        }
        prop_assert_eq!(x.pow(p - 1).reduce(1), PadicInt::new(p, 1, if x.is_unit() { 1 } else { 0 }));
    }

    #[test]
    fn frobenius_is_a_field_automorphism(p in prop::sample::select(vec![3u32, 5]), f in 1usize..=3, a in any::<u32>(), b in any::<u32>()) {
        let fq = FqContext::new(p, f).unwrap();
        let q = p.pow(f as u32);
        let (x, y) = (FqElem(a % q), FqElem(b % q));
        prop_assert_eq!(fq.frob1(fq.add(x, y)), fq.add(fq.frob1(x), fq.frob1(y)));
        prop_assert_eq!(fq.frob1(fq.mul(x, y)), fq.mul(fq.frob1(x), fq.frob1(y)));
        prop_assert_eq!(fq.frobenius(x, f as i64), x);
        prop_assert_eq!(fq.frobenius(fq.frobenius(x, -1), 1), x);
    }

    #[test]
    fn zp_pow_is_additive_in_the_exponent(
        p in prop::sample::select(vec![3u64, 5]),
        f in 1usize..=2,
        terms in prop::collection::vec((1usize..30, 1u32..25), 1..4),
        a in 0i64..10_000,
        b in 0i64..10_000,
    ) {
        let ctx = NormCtx::new(p, f, 40);
        let q = (p as u32).pow(f as u32);
        let t: Vec<(usize, FqElem)> = terms.iter().map(|&(d, c)| (d, FqElem(c % q))).collect();
        let z = ctx.from_terms(&t);
        let (ea, eb) = (PadicInt::new(p, ctx.k, a), PadicInt::new(p, ctx.k, b));
        let lhs = ctx.zp_pow(&z, &ea.add(&eb));
        let rhs = ctx.mul(&ctx.zp_pow(&z, &ea), &ctx.zp_pow(&z, &eb));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(ctx.zp_pow(&z, &PadicInt::new(p, ctx.k, 7)), ctx.int_pow(&z, 7));
    }

    #[test]
    fn galois_actions_are_multiplicative(
        p in prop::sample::select(vec![3u64, 5]),
        x in prop::collection::vec((1usize..30, 1u32..9), 1..4),
        y in prop::collection::vec((1usize..30, 1u32..9), 1..4),
    ) {
        let ctx = NormCtx::new(p, 2, 40);
        let q = (p as u32).pow(2);
        let mk = |v: &Vec<(usize, u32)>| ctx.from_terms(&v.iter().map(|&(d, c)| (d, FqElem(c % q))).collect::<Vec<_>>());
        let (a, b) = (mk(&x), mk(&y));
        let ab = ctx.mul(&a, &b);
        prop_assert_eq!(ctx.act_gamma(&ab), ctx.mul(&ctx.act_gamma(&a), &ctx.act_gamma(&b)));
        prop_assert_eq!(ctx.act_phi(&ab, 1), ctx.mul(&ctx.act_phi(&a, 1), &ctx.act_phi(&b, 1)));
        prop_assert_eq!(ctx.act_phi(&ctx.act_phi(&a, 1), -1), a);
    }

    #[test]
    fn theta_descends_and_epsilon_is_binary(p in prop::sample::select(vec![3i64, 5, 7]), rr in 0i64..7, i0 in 1i64..2_000_000, m in 1u32..8) {
        let r = 2 + rr % (p - 1);
        let ip = IndexParams::new(p, r).unwrap();
        let i = i0 - (i0 - r).rem_euclid(p - 1);
        prop_assume!(i >= r);
        let th = ip.theta_m(m, i);
        if th >= 1 {
            prop_assert!(ip.theta_m(m - 1, i) >= th + 2);
        }
        prop_assert!((0..=1).contains(&ip.epsilon_m(m, i)));
        prop_assert!(th >= ip.psi_m(m, i));
    }
}
