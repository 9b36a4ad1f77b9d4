"""Lab tools exposed over MCP"""
