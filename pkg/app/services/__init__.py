# サービスクラスはそもそも、再利用可能なコードではないことに注意
