#![allow(dead_code)]

/// Regression corpus: name, script, expected verdict when known by hand.
pub const CORPUS: &[(&str, &str, Option<bool>)] = &[
    ("pow_minus_y_2", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= (+ x (* -1 y)) 2))", Some(true)),
    ("pow_eq_3", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x 3))", Some(false)),
    ("pow_parity", "(declare-int x)(declare-int y)(declare-int z)(declare-int w)(assert (= x (exp2 y)))(assert (= x (* 2 z)))(assert (= x (+ (* 2 w) 1)))", Some(false)),
    ("pow_window", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (<= 5 x))(assert (<= x 7))", Some(false)),
    ("pow_window_sat", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (<= 5 x))(assert (<= x 9))", Some(true)),
    ("pow_minus_y_5", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x (+ y 5)))", Some(true)),
    ("pow_y_plus_1", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x (+ y 1)))", Some(true)),
    ("pow_eq_y", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x y))", Some(false)),
    ("double_exp", "(declare-int x)(declare-int y)(declare-int z)(assert (= z (exp2 x)))(assert (= x (exp2 y)))(assert (<= z 300))(assert (>= y 2))", Some(true)),
    ("double_exp_unsat", "(declare-int x)(declare-int y)(declare-int z)(assert (= z (exp2 x)))(assert (= x (exp2 y)))(assert (= z 8))", Some(false)),
    ("two_pows_diff", "(declare-int a)(declare-int b)(declare-int c)(declare-int e)(assert (= a (exp2 b)))(assert (= c (exp2 e)))(assert (= (- a c) 6))", Some(true)),
    ("two_pows_sum_7", "(declare-int a)(declare-int b)(declare-int c)(declare-int e)(assert (= a (exp2 b)))(assert (= c (exp2 e)))(assert (= (+ a c) 7))", Some(false)),
    ("regex_pow", "(declare-int x)(declare-int y)(assert (in-re (x) \"[0]*[1]([0][1])*\"))(assert (= x (exp2 y)))(assert (>= x 2))", Some(false)),
    ("regex_pow_sat", "(declare-int x)(declare-int y)(assert (in-re (x) \"[0]*[1][0]*\"))(assert (= x (exp2 y)))(assert (= y 5))", Some(true)),
    ("regex_pair", "(declare-int x)(declare-int y)(assert (in-re (x y) \"[10][01]*\"))(assert (= x (exp2 y)))", Some(true)),
    ("regex_linear", "(declare-int x)(assert (in-re (x) \"[0]*[1]([0][1])*\"))(assert (= x 21))", Some(true)),
    ("regex_linear_unsat", "(declare-int x)(assert (in-re (x) \"[0]*[1]([0][1])*\"))(assert (= x 6))", Some(false)),
    ("pow_ne_1", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (not (= x 1)))(assert (<= x 2))", Some(true)),
    ("disj_sat", "(declare-int x)(declare-int y)(assert (or (and (= x (exp2 y)) (= x 3)) (and (= x (exp2 y)) (= x 16))))", Some(true)),
    ("disj_unsat", "(declare-int x)(declare-int y)(assert (or (and (= x (exp2 y)) (= x 6)) (= (* 2 x) 7)))", Some(false)),
    ("linear_only", "(declare-int x)(declare-int y)(assert (= (+ x y) 10))(assert (= (- x y) 4))", Some(true)),
    ("linear_unsat", "(declare-int x)(declare-int y)(assert (= (+ x y) 3))(assert (= (+ x y) 4))", Some(false)),
    ("pow_mod3", "(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= x (+ (* 3 z) 2)))(assert (>= y 3))", Some(true)),
    ("pow_div3", "(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= x (* 3 z)))", Some(false)),
    ("pow_mod7", "(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= x (+ (* 7 z) 3)))", Some(false)),
    ("pow_minus_y_1013", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= (- x y) 1013))", Some(false)),
    ("pow_minus_y_1014", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= (- x y) 1014))", Some(true)),
    ("pow_sum_window", "(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= z (+ x y)))(assert (<= 9 z))(assert (<= z 10))", Some(false)),
    ("regex_three_bits", "(declare-int x)(declare-int y)(assert (in-re (x) \"[0]*[1]([0]|[1])([0]|[1])\"))(assert (= x (exp2 y)))", Some(true)),
    ("sum_pows_12", "(declare-int a)(declare-int b)(declare-int c)(declare-int e)(assert (= a (exp2 b)))(assert (= c (exp2 e)))(assert (= (+ a c) 12))(assert (>= b e))", Some(true)),
    ("exp_chain_ne", "(declare-int x)(declare-int y)(declare-int z)(assert (= x (exp2 y)))(assert (= y (exp2 z)))(assert (not (= x 2)))(assert (<= x 20))", Some(true)),
    ("pow_3y_plus_1", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x (+ (* 3 y) 1)))", Some(true)),
    ("pow_gap_1", "(declare-int x)(declare-int y)(declare-int z)(declare-int w)(assert (= x (exp2 y)))(assert (= z (exp2 w)))(assert (= x (+ z 1)))", Some(true)),
    ("pow_gap_3", "(declare-int x)(declare-int y)(declare-int z)(declare-int w)(assert (= x (exp2 y)))(assert (= z (exp2 w)))(assert (= x (+ z 3)))", Some(true)),
    ("pow_gap_5", "(declare-int x)(declare-int y)(declare-int z)(declare-int w)(assert (= x (exp2 y)))(assert (= z (exp2 w)))(assert (= x (+ z 5)))", Some(false)),
    ("nested_term", "(declare-int x)(declare-int y)(assert (= (+ x (exp2 (exp2 y))) 20))(assert (>= x 3))", Some(true)),
];
