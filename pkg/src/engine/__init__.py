"""Worker-side building blocks: graph text, state array, OMS/IMS, ledger, stats."""
