"""Systems, charts, Liouvillian reduction and its checks."""
