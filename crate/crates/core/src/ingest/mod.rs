//! Transaction CSV ingestion and edge-feature encoding.

mod encode;
mod parse;

pub use encode::{fit_encoder, signed_log, EncoderConfig, FeatureEncoder, FeatureLayout};
pub use parse::{parse_transactions, write_transactions, Parsed};

/// Header names of the transaction CSV, in the order they are written.
pub mod columns {
    pub const YEAR: &str = "Year";
    pub const MONTH: &str = "Month";
    pub const DAY: &str = "Day";
    pub const AMOUNT: &str = "Amount";
    pub const USE_CHIP: &str = "Use Chip";
    pub const MERCHANT_NAME: &str = "Merchant Name";
    pub const MERCHANT_CITY: &str = "Merchant City";
    pub const MERCHANT_STATE: &str = "Merchant State";
    pub const ZIP: &str = "Zip";
    pub const MCC: &str = "MCC";
    pub const ERRORS: &str = "Errors?";
    pub const IS_FRAUD: &str = "Is Fraud?";
    pub const CARD_ID: &str = "card_id";
    pub const HOUR: &str = "Hour";
    pub const MINUTE: &str = "Minute";

    pub const ALL: [&str; 15] = [
        YEAR,
        MONTH,
        DAY,
        AMOUNT,
        USE_CHIP,
        MERCHANT_NAME,
        MERCHANT_CITY,
        MERCHANT_STATE,
        ZIP,
        MCC,
        ERRORS,
        IS_FRAUD,
        CARD_ID,
        HOUR,
        MINUTE,
    ];
}

/// One transaction row.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionRecord {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    /// Dollars; negative for refunds.
    pub amount: f64,
    pub use_chip: String,
    pub merchant_name: i64,
    pub merchant_city: String,
    /// Empty for online merchants.
    pub merchant_state: String,
    pub zip: Option<u32>,
    pub mcc: u32,
    pub errors: Option<String>,
    pub is_fraud: bool,
    /// Card number joined with the owning user's identity.
    pub card_id: String,
    pub hour: u8,
    pub minute: u8,
}
