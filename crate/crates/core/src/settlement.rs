//! Dual-price imbalance settlement.
//!
//! Under dual pricing, underproduction is bought back at `lambda_minus >= lambda_d`
//! and overproduction is sold at `lambda_plus <= lambda_d`, so a deviation from
//! the day-ahead schedule never earns more than the day-ahead price would have.
//! The marginal opportunity costs `psi_minus` and `psi_plus` measure that gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prices and marginal opportunity costs for one settlement hour, all in €/MWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettlementRecord {
    pub lambda_d: f64,
    pub lambda_b: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub psi_minus: f64,
    pub psi_plus: f64,
}

/// Derives the imbalance prices and opportunity costs from the day-ahead and
/// balancing prices. Negative prices are fine.
pub fn derive_settlement(lambda_d: f64, lambda_b: f64) -> Result<SettlementRecord> {
    if !lambda_d.is_finite() {
        return Err(Error::InvalidPrice(lambda_d));
    }
    if !lambda_b.is_finite() {
        return Err(Error::InvalidPrice(lambda_b));
    }
    let (lambda_minus, lambda_plus) = if lambda_b >= lambda_d {
        (lambda_b, lambda_d)
    } else {
        (lambda_d, lambda_b)
    };
    Ok(SettlementRecord {
        lambda_d,
        lambda_b,
        lambda_minus,
        lambda_plus,
        psi_minus: lambda_minus - lambda_d,
        psi_plus: lambda_d - lambda_plus,
    })
}

/// Opportunity cost of bidding `bid` when `actual` was produced.
pub fn opportunity_loss(actual: f64, bid: f64, psi_minus: f64, psi_plus: f64) -> f64 {
    psi_minus * (bid - actual).max(0.0) + psi_plus * (actual - bid).max(0.0)
}

/// Market revenue of a price-taking producer under dual-price settlement.
pub fn revenue(lambda_d: f64, actual: f64, bid: f64, psi_minus: f64, psi_plus: f64) -> f64 {
    lambda_d * actual - opportunity_loss(actual, bid, psi_minus, psi_plus)
}
