//! The heuristic PvP opponent. It copies a stored argument when writing and
//! guesses from cue words when judging.

use std::collections::BTreeMap;

use rand::Rng;

use crate::domain::{Argument, FallacyLabel, TopicId, LABEL_COUNT};

/// Counts whole-word, case-insensitive occurrences of `cue` in `text`.
fn count_cue(text: &str, cue: &str) -> usize {
    let cue = cue.trim().to_lowercase();
    if cue.is_empty() {
        return 0;
    }
    let is_word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
    let mut hits = 0;
    let mut from = 0;
    while let Some(pos) = text[from..].find(&cue) {
        let start = from + pos;
        let end = start + cue.len();
        let before = text[..start].chars().next_back();
        let after = text[end..].chars().next();
        if !is_word(before) && !is_word(after) {
            hits += 1;
        }
        from = start + cue.chars().next().map_or(1, char::len_utf8);
    }
    hits
}

/// Cue hits per label.
pub fn lexicon_scores(
    text: &str,
    lexicon: &BTreeMap<FallacyLabel, Vec<String>>,
) -> [usize; LABEL_COUNT] {
    let text = text.to_lowercase();
    let mut scores = [0; LABEL_COUNT];
    for (label, cues) in lexicon {
        scores[label.index()] = cues.iter().map(|c| count_cue(&text, c)).sum();
    }
    scores
}

/// The label with most cue hits, ties to the earlier label; `no_fallacy`
/// when nothing matches.
pub fn bot_guess(text: &str, lexicon: &BTreeMap<FallacyLabel, Vec<String>>) -> FallacyLabel {
    let scores = lexicon_scores(text, lexicon);
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    if scores[best] == 0 {
        FallacyLabel::NoFallacy
    } else {
        FallacyLabel::ALL[best]
    }
}

/// Picks the text the bot submits for `secret` on `topic`. Preference order:
/// gold-labelled as `secret`, player-written with assigned type `secret`,
/// seeds of type `secret`, any seed of the topic, any argument of the topic.
/// Uniform within the first non-empty group. `pool` must be in a stable
/// order.
pub fn bot_pick<'a, R: Rng>(
    pool: &'a [Argument],
    topic: &TopicId,
    secret: FallacyLabel,
    rng: &mut R,
) -> Option<&'a Argument> {
    let on_topic: Vec<&Argument> = pool
        .iter()
        .filter(|a| a.is_playable() && &a.topic_id == topic && !a.author_id.is_bot())
        .collect();
    let groups: [&dyn Fn(&Argument) -> bool; 5] = [
        &|a| a.gold.as_ref().is_some_and(|g| g.label == secret),
        &|a| !a.is_seed() && a.assigned_type == secret,
        &|a| a.is_seed() && a.assigned_type == secret,
        &|a| a.is_seed(),
        &|_| true,
    ];
    for group in groups {
        let members: Vec<&Argument> = on_topic.iter().copied().filter(|a| group(a)).collect();
        if !members.is_empty() {
            return Some(members[rng.random_range(0..members.len())]);
        }
    }
    None
}
