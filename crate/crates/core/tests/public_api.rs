use cubic_zeta::arith::big_pow;
use cubic_zeta::cubic::{Sign, SignedConstant};
use cubic_zeta::kloosterman::{global_k, kloosterman_table, ScanConfig};
use cubic_zeta::overorders::{coset_set, enumerate_overorders, monogenic_form, oracle_enumerate};
use cubic_zeta::series::{
    closed_local, trace_factor_oracle, trivial_trace_factor, truncated_local_d,
};
use cubic_zeta::Error;

fn c(p: u64, k: u32, sign: Sign) -> SignedConstant {
    SignedConstant::new(p, k, sign).unwrap()
}

#[test]
fn system_and_oracle_agree_for_q3_r2() {
    let constant = c(7, 2, Sign::Minus);
    let m: i64 = big_pow(3, 4).try_into().unwrap();
    for a in 0..m {
        for b in 0..m {
            let f = monogenic_form(a, b, &constant);
            let sys = enumerate_overorders(&f, &constant, 3, 2).unwrap();
            let orc = oracle_enumerate(&f, &constant, 3, 2).unwrap();
            assert_eq!(coset_set(&sys, 3), coset_set(&orc, 3), "a={a} b={b}");
        }
    }
}

#[test]
fn tables_do_not_depend_on_the_sign() {
    let cfg = ScanConfig::default();
    let plus = kloosterman_table(3, c(5, 1, Sign::Plus), 3, 2, &cfg);
    let minus = kloosterman_table(3, c(5, 1, Sign::Minus), 3, 2, &cfg);
    for ((_, x), (_, y)) in plus.iter().zip(&minus) {
        assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
    }
}

#[test]
fn local_series_matches_closed_form_at_eleven() {
    let constant = c(5, 2, Sign::Plus);
    let computed = truncated_local_d(11, constant, 3, &ScanConfig::default()).unwrap();
    let expected = closed_local(11, 5, 2).unwrap().function.taylor(3).unwrap();
    assert_eq!(computed, expected);
}

#[test]
fn global_sum_is_multiplicative() {
    let cfg = ScanConfig::default();
    let constant = c(7, 1, Sign::Plus);
    let k = |n, f| global_k(n, f, constant, &cfg).unwrap();
    assert_eq!(k(12, 5), k(4, 1) * k(3, 1) * k(1, 5));
    assert_eq!(k(1, 1), 1.into());
}

#[test]
fn trace_factors() {
    for p in [2, 3, 5, 7] {
        for k in 0..5 {
            assert_eq!(
                trivial_trace_factor(p, k).unwrap(),
                trace_factor_oracle(p, k).unwrap()
            );
        }
    }
    assert!(matches!(
        trivial_trace_factor(4, 1),
        Err(Error::NotPrime(4))
    ));
}
