use super::{BinaryOp, Node, UnaryOp};

pub(crate) const TINY: f64 = 1e-12;
pub(crate) const EXP_CLAMP: f64 = 700.0;
pub(crate) const MAGNITUDE_CLAMP: f64 = 1e300;

#[inline]
pub(crate) fn guard(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-MAGNITUDE_CLAMP, MAGNITUDE_CLAMP)
    }
}

#[inline]
fn unary(op: UnaryOp, a: f64) -> f64 {
    match op {
        UnaryOp::Neg => -a,
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Tanh => a.tanh(),
        UnaryOp::Exp => a.clamp(-EXP_CLAMP, EXP_CLAMP).exp(),
        UnaryOp::Abs => a.abs(),
        UnaryOp::Sqrt => a.max(TINY).sqrt(),
        UnaryOp::Log => a.max(TINY).ln(),
        UnaryOp::Floor => a.floor(),
    }
}

#[inline]
fn binary(op: BinaryOp, a: f64, b: f64) -> f64 {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            let d = if b.abs() < TINY {
                if b.is_sign_negative() {
                    -TINY
                } else {
                    TINY
                }
            } else {
                b
            };
            a / d
        }
        BinaryOp::Pow => {
            if a < 0.0 && b.fract() != 0.0 {
                a.abs().powf(b)
            } else {
                a.powf(b)
            }
        }
        BinaryOp::Min => a.min(b),
        BinaryOp::Max => a.max(b),
    }
}

pub(crate) fn eval_node(node: &Node, x: &[f64]) -> f64 {
    match node {
        Node::Const(v) => *v,
        Node::Var(i) => x[*i],
        Node::Unary(op, a) => guard(unary(*op, eval_node(a, x))),
        Node::Binary(op, a, b) => guard(binary(*op, eval_node(a, x), eval_node(b, x))),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, random_tree};
    use rand::Rng;

    #[test]
    fn guarded_examples() {
        assert_eq!(parse("sin(x1)*x2", 2).unwrap().eval(&[0.0, 3.0]), 0.0);
        let v = parse("log(x1)", 1).unwrap().eval(&[0.0]);
        assert!((v - (1e-12f64).ln()).abs() < 1e-12);
        assert!((v + 27.631).abs() < 1e-3);
        let v = parse("1/(x1-1)", 1).unwrap().eval(&[1.0]);
        assert!((v - 1e12).abs() < 1.0);
        assert_eq!(parse("sqrt(x1)", 1).unwrap().eval(&[-4.0]), 1e-6);
        assert_eq!(parse("exp(x1)", 1).unwrap().eval(&[1e6]), 1e300);
        assert_eq!(parse("exp(x1)", 1).unwrap().eval(&[-1e6]), (-700.0f64).exp());
        assert_eq!(parse("x1 ^ 0.5", 1).unwrap().eval(&[-4.0]), 2.0);
        assert_eq!(parse("x1 ^ 2", 1).unwrap().eval(&[-4.0]), 16.0);
        assert_eq!(parse("-1/(x1)", 1).unwrap().eval(&[-0.0]), 1e12);
    }

    #[test]
    fn overflow_is_clamped() {
        let t = parse("exp(x1) * exp(x1) * exp(x1)", 1).unwrap();
        assert_eq!(t.eval(&[700.0]), 1e300);
        let t = parse("0 ^ (-1) - 0 ^ (-1)", 1).unwrap();
        assert!(t.eval(&[0.0]).is_finite());
    }

    #[test]
    fn totality_fuzz() {
        // 10^5 (tree, point) pairs: 2000 random trees, 50 points each.
        let mut rng = crate::rng::seed_rng(2024);
        for _ in 0..2000 {
            let dim = rng.random_range(1..=5);
            let depth = rng.random_range(1..=10);
            let t = random_tree(&mut rng, dim, depth);
            for _ in 0..50 {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..=5.0)).collect();
                let v = t.eval(&x);
                assert!(v.is_finite(), "{t} at {x:?} -> {v}");
            }
        }
    }
}
