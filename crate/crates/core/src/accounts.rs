//! Accounts and bearer tokens. Password hashing is left to the caller; the
//! store only ever sees the digest.

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{Role, UserAccount, UserId};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::store::Keyed;

pub const AVATAR_COUNT: u32 = 12;
pub const TOKEN_LIFETIME_DAYS: i64 = 30;

/// A stored bearer token. Only the SHA-256 of the token is kept, so a leaked
/// journal does not leak live credentials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthToken {
    pub digest: String,
    pub user_id: UserId,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
    pub revoked: bool,
}

impl Keyed for AuthToken {
    fn key(&self) -> String {
        self.digest.clone()
    }
}

impl AuthToken {
    pub fn is_valid_at(&self, now: DateTime<Utc>) -> bool {
        !self.revoked && now < self.expires_at
    }
}

pub fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

/// 128 random bits, hex encoded.
pub fn generate_token() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

fn normalize(handle: &str) -> String {
    handle.trim().to_lowercase()
}

impl Platform {
    pub fn user(&self, id: &UserId) -> Option<UserAccount> {
        self.store.get::<UserAccount>(id.as_str())
    }

    pub fn find_by_handle(&self, handle: &str) -> Option<UserAccount> {
        let wanted = normalize(handle);
        self.store
            .scan::<UserAccount>(|u| normalize(&u.handle) == wanted)
            .into_iter()
            .next()
    }

    /// Creates a player account. Handles compare case-insensitively.
    pub fn create_account(&self, handle: &str, password_digest: &str) -> Result<UserAccount> {
        let handle = handle.trim();
        if handle.is_empty() {
            return Err(Error::Text(crate::domain::TextError::Empty));
        }
        let wanted = normalize(handle);
        let now = self.clock.now();
        let avatar_id = self.with_rng(|rng| rng.random_range(0..AVATAR_COUNT));
        self.store.transact(|tx| {
            if !tx
                .scan::<UserAccount>(|u| normalize(&u.handle) == wanted)
                .is_empty()
            {
                return Err(Error::HandleTaken);
            }
            let account = UserAccount {
                id: UserId::new(tx.next_id("user")),
                handle: handle.to_owned(),
                avatar_id,
                password_digest: password_digest.to_owned(),
                roles: vec![Role::Player],
                total_points: 0,
                created_at: now,
            };
            tx.put(account.clone());
            Ok(account)
        })
    }

    pub fn grant_admin(&self, user: &UserId) -> Result<UserAccount> {
        self.store.transact(|tx| {
            let mut account = tx
                .get::<UserAccount>(user.as_str())
                .ok_or(Error::UnknownUser)?;
            if !account.is_admin() {
                account.roles.push(Role::Admin);
                tx.put(account.clone());
            }
            Ok(account)
        })
    }

    /// Issues a new token and returns it in clear; it is not recoverable
    /// afterwards.
    pub fn issue_token(&self, user: &UserId) -> Result<(String, AuthToken)> {
        let token = generate_token();
        let now = self.clock.now();
        let record = AuthToken {
            digest: token_digest(&token),
            user_id: user.clone(),
            issued_at: now,
            expires_at: now + Duration::days(TOKEN_LIFETIME_DAYS),
            revoked: false,
        };
        self.store.transact(|tx| {
            tx.get::<UserAccount>(user.as_str())
                .ok_or(Error::UnknownUser)?;
            tx.put(record.clone());
            Ok::<_, Error>(())
        })?;
        Ok((token, record))
    }

    /// The account behind a live token.
    pub fn resolve_token(&self, token: &str) -> Option<UserAccount> {
        let record = self.store.get::<AuthToken>(&token_digest(token))?;
        if !record.is_valid_at(self.clock.now()) {
            return None;
        }
        self.user(&record.user_id)
    }

    /// Revokes a token. Unknown or already revoked tokens are accepted.
    pub fn revoke_token(&self, token: &str) -> Result<()> {
        let digest = token_digest(token);
        self.store.transact(|tx| {
            if let Some(mut record) = tx.get::<AuthToken>(&digest) {
                if !record.revoked {
                    record.revoked = true;
                    tx.put(record);
                }
            }
            Ok(())
        })
    }
}
