use std::collections::HashMap;

use chrono::{DateTime, Datelike, Duration, NaiveTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::{ScoreEvent, UserAccount, UserId};
use crate::platform::Platform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    AllTime,
    Weekly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub user_id: UserId,
    pub handle: String,
    pub avatar_id: u32,
    pub points: u64,
    pub player_of_the_week: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Leaderboard {
    pub period: Period,
    /// `[start, end)` of the ISO week for weekly boards.
    pub window: Option<(DateTime<Utc>, DateTime<Utc>)>,
    pub entries: Vec<LeaderboardEntry>,
    pub player_of_the_week: Option<UserId>,
}

/// Monday 00:00 UTC of the ISO week containing `at`, and the following
/// Monday.
pub fn iso_week_bounds(at: DateTime<Utc>) -> (DateTime<Utc>, DateTime<Utc>) {
    let days_from_monday = at.weekday().num_days_from_monday() as i64;
    let monday = (at.date_naive() - Duration::days(days_from_monday))
        .and_time(NaiveTime::MIN)
        .and_utc();
    (monday, monday + Duration::days(7))
}

/// Ranks users by points, ties to the older account and then the id.
fn rank(users: &[UserAccount], points: &HashMap<&UserId, u64>) -> Vec<(UserAccount, u64)> {
    let mut rows: Vec<(UserAccount, u64)> = users
        .iter()
        .map(|u| (u.clone(), points.get(&u.id).copied().unwrap_or(0)))
        .collect();
    rows.sort_by(|(a, pa), (b, pb)| {
        pb.cmp(pa)
            .then(a.created_at.cmp(&b.created_at))
            .then(a.id.cmp(&b.id))
    });
    rows
}

fn weekly_points(
    events: &[ScoreEvent],
    window: (DateTime<Utc>, DateTime<Utc>),
) -> HashMap<&UserId, u64> {
    let mut points = HashMap::new();
    for e in events {
        if e.occurred_at >= window.0 && e.occurred_at < window.1 {
            *points.entry(&e.user_id).or_default() += e.points;
        }
    }
    points
}

pub fn build_leaderboard(
    users: &[UserAccount],
    events: &[ScoreEvent],
    period: Period,
    now: DateTime<Utc>,
) -> Leaderboard {
    let current = iso_week_bounds(now);
    let previous = (current.0 - Duration::days(7), current.0);
    let last_week = rank(users, &weekly_points(events, previous));
    let player_of_the_week = last_week
        .first()
        .filter(|(_, p)| *p > 0)
        .map(|(u, _)| u.id.clone());

    let (rows, window) = match period {
        Period::AllTime => {
            let totals = users.iter().map(|u| (&u.id, u.total_points)).collect();
            (rank(users, &totals), None)
        }
        Period::Weekly => (rank(users, &weekly_points(events, current)), Some(current)),
    };
    let entries = rows
        .into_iter()
        .enumerate()
        .map(|(i, (u, points))| LeaderboardEntry {
            rank: i + 1,
            player_of_the_week: player_of_the_week.as_ref() == Some(&u.id),
            user_id: u.id,
            handle: u.handle,
            avatar_id: u.avatar_id,
            points,
        })
        .collect();
    Leaderboard {
        period,
        window,
        entries,
        player_of_the_week,
    }
}

impl Platform {
    pub fn leaderboard(&self, period: Period, now: DateTime<Utc>) -> Leaderboard {
        let snapshot = self.store.snapshot();
        let users: Vec<UserAccount> = snapshot.iter::<UserAccount>().cloned().collect();
        let events: Vec<ScoreEvent> = snapshot.iter::<ScoreEvent>().cloned().collect();
        build_leaderboard(&users, &events, period, now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Role, ScoreReason};
    use chrono::TimeZone;

    fn at(d: u32, h: u32, m: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 3, d, h, m, 0).unwrap()
    }

    fn user(id: &str, created_day: u32, total: u64) -> UserAccount {
        UserAccount {
            id: UserId::new(id),
            handle: id.into(),
            avatar_id: 0,
            password_digest: String::new(),
            roles: vec![Role::Player],
            total_points: total,
            created_at: at(created_day, 0, 0),
        }
    }

    fn event(user: &str, points: u64, when: DateTime<Utc>) -> ScoreEvent {
        ScoreEvent {
            id: format!("{user}-{when}"),
            user_id: UserId::new(user),
            points,
            reason: ScoreReason::SoftFeedback,
            occurred_at: when,
            reference: String::new(),
        }
    }

    #[test]
    fn week_bounds_are_monday_to_monday() {
        // 2024-03-04 is a Monday
        let (start, end) = iso_week_bounds(at(10, 23, 59));
        assert_eq!(start, at(4, 0, 0));
        assert_eq!(end, at(11, 0, 0));
        assert_eq!(iso_week_bounds(at(4, 0, 0)).0, at(4, 0, 0));
    }

    #[test]
    fn monday_midnight_and_sunday_night_count_in_the_same_week() {
        let users = vec![user("a", 1, 2)];
        let events = vec![event("a", 1, at(4, 0, 0)), event("a", 1, at(10, 23, 59))];
        let board = build_leaderboard(&users, &events, Period::Weekly, at(6, 12, 0));
        assert_eq!(board.entries[0].points, 2);
    }

    #[test]
    fn newcomer_leads_weekly_but_not_all_time() {
        let users = vec![user("veteran", 1, 500), user("newcomer", 5, 10)];
        let events = vec![
            event("veteran", 500, at(1, 0, 0)),
            event("newcomer", 10, at(5, 9, 0)),
        ];
        let weekly = build_leaderboard(&users, &events, Period::Weekly, at(6, 0, 0));
        assert_eq!(weekly.entries[0].user_id.as_str(), "newcomer");
        let all = build_leaderboard(&users, &events, Period::AllTime, at(6, 0, 0));
        assert_eq!(all.entries[0].user_id.as_str(), "veteran");
    }

    #[test]
    fn ties_go_to_the_older_account_and_previous_week_top_is_flagged() {
        let users = vec![user("b", 2, 5), user("a", 1, 5)];
        let events = vec![event("a", 5, at(1, 0, 0)), event("b", 5, at(1, 1, 0))];
        let board = build_leaderboard(&users, &events, Period::AllTime, at(6, 0, 0));
        assert_eq!(board.entries[0].user_id.as_str(), "a");
        assert_eq!(board.player_of_the_week, Some(UserId::new("a")));
        assert!(board.entries[0].player_of_the_week);
        assert!(!board.entries[1].player_of_the_week);
        // nobody scored the week before 2024-02-26
        let earlier = build_leaderboard(&users, &events, Period::Weekly, at(1, 0, 0));
        assert_eq!(earlier.player_of_the_week, None);
    }
}
