"""Desk-scale behavior-cloning chess policy.

Tokenized-FEN in (77 symbols + action slot), 1968-way action
distribution out, trained on filtered playout corpora and served over
the oodchess policy wire protocol.
"""

__version__ = "0.1.0"
