//! Maximum-cardinality bipartite matching by augmenting paths.

/// Returns, for every left vertex, its matched right vertex.
///
/// `adj[u]` lists the right vertices adjacent to left vertex `u` in
/// preference order; `n_right` bounds the right indices. A greedy pass seeds
/// the matching, after which each free left vertex runs one breadth-first
/// search for an augmenting path. With degree ≤ 1 on both sides the greedy
/// pass is already maximum and no search runs.
pub(crate) fn maximum_matching<A: AsRef<[usize]>>(adj: &[A], n_right: usize) -> Vec<Option<usize>> {
    let mut match_left: Vec<Option<usize>> = vec![None; adj.len()];
    let mut match_right: Vec<Option<usize>> = vec![None; n_right];

    for (u, nbrs) in adj.iter().map(AsRef::as_ref).enumerate() {
        if let Some(&r) = nbrs.iter().find(|&&r| match_right[r].is_none()) {
            match_left[u] = Some(r);
            match_right[r] = Some(u);
        }
    }

    let mut stamp = vec![0u32; n_right];
    let mut parent = vec![usize::MAX; n_right];
    let mut round = 0u32;
    let mut queue = Vec::new();
    for u in 0..adj.len() {
        if match_left[u].is_some() || adj[u].as_ref().is_empty() {
            continue;
        }
        round += 1;
        queue.clear();
        queue.push(u);
        let mut head = 0;
        let mut free_end = None;
        'search: while head < queue.len() {
            let x = queue[head];
            head += 1;
            for &r in adj[x].as_ref() {
                if stamp[r] == round {
                    continue;
                }
                stamp[r] = round;
                parent[r] = x;
                match match_right[r] {
                    None => {
                        free_end = Some(r);
                        break 'search;
                    }
                    Some(y) => queue.push(y),
                }
            }
        }
        if let Some(mut r) = free_end {
            loop {
                let x = parent[r];
                let prev = match_left[x];
                match_left[x] = Some(r);
                match_right[r] = Some(x);
                if x == u {
                    break;
                }
                r = prev.expect("interior vertex of an alternating path is matched");
            }
        }
    }
    match_left
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(m: &[Option<usize>]) -> usize {
        m.iter().filter(|x| x.is_some()).count()
    }

    #[test]
    fn greedy_is_not_enough() {
        // greedy takes 0→0, leaving 1 stranded unless the path 1→0→0→1 is found
        let adj = vec![vec![0, 1], vec![0]];
        let m = maximum_matching(&adj, 2);
        assert_eq!(m, vec![Some(1), Some(0)]);
    }

    #[test]
    fn long_augmenting_chain() {
        let n = 50;
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i, i + 1]).collect();
        adj.push(vec![0]);
        let m = maximum_matching(&adj, n + 1);
        assert_eq!(size(&m), n + 1);
        let mut used: Vec<usize> = m.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), n + 1);
    }

    #[test]
    fn hall_violation_leaves_one_free() {
        let adj = vec![vec![0], vec![0], vec![1]];
        assert_eq!(size(&maximum_matching(&adj, 2)), 2);
    }
}
