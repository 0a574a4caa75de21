//! Binary form to n-ary form.

use crate::expr::ExprNode;

/// Collapses chains of like associative operators (sum under sum, product
/// under product) into a single node owning every operand of the chain.
///
/// Operand order is preserved left to right. Difference, quotient, power,
/// negation and function nodes keep their shape; only their subtrees are
/// flattened. The input is left untouched.
pub fn flatten(t: &ExprNode) -> ExprNode {
    let kind = t.kind();
    if kind.is_leaf() {
        return t.clone();
    }
    let mut children = Vec::with_capacity(t.children().len());
    for child in t.children() {
        let flat = flatten(child);
        if kind.is_associative() && flat.kind() == kind {
            children.extend(flat.children().iter().cloned());
        } else {
            children.push(flat);
        }
    }
    // Absorbing children only ever grows the operand list, so arity holds.
    ExprNode::op(kind, children).expect("flatten preserves arity")
}

/// Node counts before and after [`flatten`].
pub fn flatten_stats(t: &ExprNode) -> (usize, usize) {
    (t.count_nodes(), flatten(t).count_nodes())
}

/// True if no sum has a sum child and no product has a product child.
pub fn is_flat(t: &ExprNode) -> bool {
    let kind = t.kind();
    t.children()
        .iter()
        .all(|child| !(kind.is_associative() && child.kind() == kind) && is_flat(child))
}

/// Number of like-operator parent/child edges, i.e. how many operator nodes
/// flattening will remove.
pub fn like_chain_edges(t: &ExprNode) -> usize {
    let kind = t.kind();
    t.children()
        .iter()
        .map(|child| {
            usize::from(kind.is_associative() && child.kind() == kind) + like_chain_edges(child)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::build::*;
    use crate::expr::UnaryFn;

    #[test]
    fn x_plus_y_plus_one_collapses() {
        let left = add(add(x(), y()), c(1.0));
        let flat = flatten(&left);
        assert_eq!(flat, sum(vec![x(), y(), c(1.0)]));
        assert_eq!(flat.count_nodes(), 4);

        let right = add(x(), add(y(), c(1.0)));
        assert_eq!(flatten(&right), sum(vec![x(), y(), c(1.0)]));
        assert_eq!(flatten_stats(&right), (5, 4));
    }

    #[test]
    fn idempotent_on_flat_input() {
        let t = sum(vec![x(), y(), c(1.0)]);
        assert_eq!(flatten(&t), t);
    }

    #[test]
    fn power_is_never_collapsed() {
        let t = pow(x(), pow(y(), x()));
        assert_eq!(flatten(&t), t);
        let d = sub(sub(x(), y()), c(1.0));
        assert_eq!(flatten(&d), d);
    }

    #[test]
    fn transitive_collapse() {
        let t = add(add(add(var(0), var(1)), var(2)), var(3));
        assert_eq!(flatten(&t), sum(vec![var(0), var(1), var(2), var(3)]));
    }

    #[test]
    fn left_comb_of_eight() {
        // oracle: n leaves joined by n-1 binary '+' nodes collapse to 1 + n nodes
        let mut t = var(0);
        for i in 1..8 {
            t = add(t, var(i));
        }
        let brute_before = 8 + 7;
        let brute_after = 1 + 8;
        assert_eq!(flatten_stats(&t), (brute_before, brute_after));
        assert_eq!(flatten_stats(&c(1.0)), (1, 1));
    }

    #[test]
    fn mixed_operators_are_kept_apart() {
        // sum under product under sum: nothing to merge across the product
        let t = add(mul(add(x(), y()), mul(x(), y())), c(2.0));
        let flat = flatten(&t);
        assert_eq!(flat, add(product(vec![add(x(), y()), x(), y()]), c(2.0)));
        assert!(is_flat(&flat));
        assert!(!is_flat(&t));
        assert_eq!(like_chain_edges(&t), 1);
    }

    #[test]
    fn flattens_below_fixed_arity_nodes() {
        let t = call(UnaryFn::Sin, neg(add(add(x(), y()), c(1.0))));
        let flat = flatten(&t);
        assert_eq!(flat, call(UnaryFn::Sin, neg(sum(vec![x(), y(), c(1.0)]))));
    }

    #[test]
    fn input_untouched() {
        let t = add(add(x(), y()), c(1.0));
        let copy = t.clone();
        let _ = flatten(&t);
        assert_eq!(t, copy);
    }
}
