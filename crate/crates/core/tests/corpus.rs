use avoidance::exhaustive::{
    blank_append_monotone, for_each_permissible, permissible_words, verify_lemma_exhaustive,
};
use avoidance::reduction::{reduce_certificate, Edit, Rule};
use avoidance::sequence::{is_permissible, total_weight, Symbol, Weight};
use num_traits::Zero;

/// Number of permissible words of length `len` by transfer matrix over the last letter.
fn count_permissible(k: u32, len: usize) -> u64 {
    let slots = k as usize + 1;
    let mut ending = vec![1u64; slots];
    for _ in 1..len {
        let mut next = vec![0u64; slots];
        for (last, &count) in ending.iter().enumerate() {
            for (sym, slot) in next.iter_mut().enumerate() {
                if sym == 0 || last == 0 || sym >= last {
                    *slot += count;
                }
            }
        }
        ending = next;
    }
    ending.iter().sum()
}

#[test]
fn per_length_counts_match_transfer_matrix() {
    for (k, max_len) in [(1u32, 8usize), (2, 7), (3, 6), (4, 5)] {
        let rep = verify_lemma_exhaustive(k, max_len).unwrap();
        assert!(rep.passed());
        let expected: Vec<u64> = (1..=max_len).map(|len| count_permissible(k, len)).collect();
        assert_eq!(rep.per_length, expected, "k={k}");
        assert_eq!(rep.sequences, expected.iter().sum::<u64>());
    }
}

#[test]
fn victim_steps_account_pair_by_pair() {
    for s in permissible_words(3, 7) {
        let c = reduce_certificate(&s).unwrap();
        for step in &c.steps {
            let Edit::Victim(j) = step.edit else { continue };
            let red = step.redistribution.as_ref().unwrap();
            assert!(red.input_of(j) >= red.output_of(j));
            let before = total_weight(&step.before);
            let after = total_weight(&step.after);
            assert_eq!(after.total - before.total, step.weight_delta);
            assert_eq!(step.weight_delta, red.input_of(j) - red.output_of(j));
            let donated: Weight = red
                .donations
                .iter()
                .filter(|d| d.symbol == j)
                .map(|d| d.amount)
                .sum();
            assert_eq!(donated, red.output_of(j));
        }
    }
}

#[test]
fn appending_a_blank_adds_slack() {
    let mut checked = 0;
    for len in 0..=6 {
        for_each_permissible(3, len, Vec::new(), &mut |s| {
            assert!(blank_append_monotone(s), "{s}");
            checked += 1;
        });
    }
    assert!(checked > 1000);
}

#[test]
fn tight_words_exist_and_rules_all_fire() {
    let rep = verify_lemma_exhaustive(2, 7).unwrap();
    assert!(rep.tight > 0);
    for rule in Rule::ALL {
        assert!(
            rep.rule_counts.get(&rule).copied().unwrap_or(0) > 0,
            "{rule} never used"
        );
    }
}

#[test]
fn enumeration_is_exactly_the_permissible_set() {
    let words = permissible_words(2, 5);
    assert!(words.iter().all(is_permissible));
    let blanks_only = words
        .iter()
        .filter(|s| s.symbols().iter().all(|x| *x == Symbol::Blank))
        .count();
    assert_eq!(blanks_only, 5);
    assert!(words
        .iter()
        .all(|s| total_weight(s).total >= Weight::zero()));
}
